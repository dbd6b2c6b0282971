#pragma once

#include <string>
#include <string_view>

namespace trialsize {

// Porter (1980) suffix-stripping stemmer. Input is expected lowercase ASCII;
// other bytes are treated as consonants.
std::string porter_stem(std::string_view word);

}  // namespace trialsize
