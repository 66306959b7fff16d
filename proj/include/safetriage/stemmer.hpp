#pragma once

#include <string>
#include <string_view>

namespace safetriage::porter2 {

/// Snowball English ("Porter2") stem of a lowercase word. Words shorter than
/// three characters and the algorithm's fixed exception words are returned
/// unchanged (or mapped through the exception table).
std::string stem(std::string_view word);

}  // namespace safetriage::porter2
