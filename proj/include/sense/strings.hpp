#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sense {

// ASCII case-folding; KB names and aliases are ASCII by construction.
std::string casefold(std::string_view s);

std::string trim(std::string_view s);

// Collapses runs of whitespace to single spaces and trims the ends.
std::string collapse_ws(std::string_view s);

// Splits on whitespace and '/' (so "GPS/Location" yields {"GPS", "Location"}).
std::vector<std::string> split_name_tokens(std::string_view s);

std::size_t levenshtein(std::string_view a, std::string_view b);

// Distance used for fuzzy name matching: the minimum of the whole-name
// distance and the distance to any single token of the candidate, both
// case-folded. "entrpy" is distance 1 from "Shannon entropy" because the
// token "entropy" is one edit away.
std::size_t name_match_distance(std::string_view query, std::string_view candidate);

bool starts_with_ci(std::string_view s, std::string_view prefix);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace sense
