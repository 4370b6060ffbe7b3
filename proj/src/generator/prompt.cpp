#include "cdga/generator/prompt.hpp"

#include "cdga/core/error.hpp"

namespace cdga {

std::string build_prompt(std::string_view class_label, std::string_view domain_description) {
  if (class_label.empty()) throw InvalidArgument("build_prompt: empty class label");
  std::string out = "a ";
  out += class_label;
  if (!domain_description.empty()) {
    out += ", ";
    out += domain_description;
  }
  return out;
}

}  // namespace cdga
