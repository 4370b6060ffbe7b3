#include "cdga/trainer/results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "cdga/core/error.hpp"

namespace cdga {

namespace {

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_mean_se(double mean, double se) { return fixed1(mean) + " ± " + fixed1(se); }

ResultTable aggregate_table(const std::vector<TrialResult>& results) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : results) {
    if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0)) {
      throw InvalidArgument("trial accuracy must lie in [0, 1]");
    }
    groups[{r.dataset, r.selection, r.algorithm, r.target_domain}].push_back(100.0 * r.accuracy);
  }
  ResultTable table;
  for (const auto& [key, values] : groups) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n;
    const auto& [dataset, selection, algorithm, target] = key;
    table.cells.push_back(ResultCell{algorithm, dataset, selection, target, mean,
                                     std::sqrt(var) / std::sqrt(n), static_cast<int>(values.size())});
  }
  return table;
}

double ResultTable::average(const std::string& algorithm, const std::string& dataset,
                            const std::string& selection) const {
  double s = 0.0;
  int n = 0;
  for (const auto& c : cells) {
    if (c.algorithm == algorithm && c.dataset == dataset && c.selection == selection) {
      s += c.mean;
      ++n;
    }
  }
  if (n == 0) throw InvalidArgument("no cells for " + algorithm + "/" + dataset + "/" + selection);
  return s / n;
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  out << "algorithm,dataset,selection,target,mean,se,trials\n";
  for (const auto& c : cells) {
    out << csv_field(c.algorithm) << ',' << csv_field(c.dataset) << ',' << csv_field(c.selection)
        << ',' << csv_field(c.target_domain) << ',' << fixed4(c.mean) << ',' << fixed4(c.se) << ','
        << c.trials << '\n';
  }
  return out.str();
}

std::string ResultTable::to_text() const {
  std::ostringstream out;
  std::map<std::pair<std::string, std::string>, std::vector<const ResultCell*>> blocks;
  for (const auto& c : cells) blocks[{c.dataset, c.selection}].push_back(&c);

  for (const auto& [block, members] : blocks) {
    std::vector<std::string> targets;
    std::vector<std::string> algorithms;
    for (const auto* c : members) {
      if (std::find(targets.begin(), targets.end(), c->target_domain) == targets.end()) {
        targets.push_back(c->target_domain);
      }
      if (std::find(algorithms.begin(), algorithms.end(), c->algorithm) == algorithms.end()) {
        algorithms.push_back(c->algorithm);
      }
    }
    std::sort(targets.begin(), targets.end());

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"Algorithm"};
    header.insert(header.end(), targets.begin(), targets.end());
    header.push_back("Avg");
    rows.push_back(header);
    for (const auto& alg : algorithms) {
      std::vector<std::string> row{alg};
      bool complete = true;
      for (const auto& t : targets) {
        const auto it = std::find_if(members.begin(), members.end(), [&](const ResultCell* c) {
          return c->algorithm == alg && c->target_domain == t;
        });
        if (it == members.end()) {
          row.push_back("X");
          complete = false;
        } else {
          row.push_back(format_mean_se((*it)->mean, (*it)->se));
        }
      }
      row.push_back(complete ? fixed1(average(alg, block.first, block.second)) : "X");
      rows.push_back(std::move(row));
    }

    std::vector<std::size_t> width(header.size(), 0);
    auto display_len = [](const std::string& s) {
      // "±" is two bytes in UTF-8 but one column.
      std::size_t n = 0;
      for (unsigned char ch : s) n += (ch & 0xC0) != 0x80 ? 1 : 0;
      return n;
    };
    for (const auto& row : rows) {
      for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], display_len(row[k]));
    }
    out << "Dataset: " << block.first << "  Selection: " << block.second << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t k = 0; k < rows[r].size(); ++k) {
        out << rows[r][k];
        if (k + 1 < rows[r].size()) out << std::string(width[k] - display_len(rows[r][k]) + 2, ' ');
      }
      out << '\n';
      if (r == 0) {
        std::size_t total = 0;
        for (auto w : width) total += w + 2;
        total -= 2;
        out << std::string(total, '-') << '\n';
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cdga
