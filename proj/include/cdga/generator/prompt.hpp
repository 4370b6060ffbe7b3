#pragma once

#include <string>
#include <string_view>

namespace cdga {

// "a <class>, <domain description>", or "a <class>" when the description is
// empty. Throws InvalidArgument for an empty class label.
std::string build_prompt(std::string_view class_label, std::string_view domain_description);

}  // namespace cdga
