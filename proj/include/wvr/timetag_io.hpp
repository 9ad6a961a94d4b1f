#pragma once

// Time-tag text files:
//
//   # wvr-timetags 1
//   # key=value            (one line per metadata entry, keys sorted)
//   timestamp_ns,detector,pass_index
//   ...
//
// detector is L or R; pass_index is a positive integer or '-' when unknown.

#include <filesystem>
#include <iosfwd>

#include "wvr/montecarlo.hpp"

namespace wvr {

void write_timetags(const TimeTagSet& tags, std::ostream& out);
void write_timetags(const TimeTagSet& tags, const std::filesystem::path& path);

/// Throws FormatError with the offending line number on malformed input.
TimeTagSet read_timetags(std::istream& in);
TimeTagSet read_timetags(const std::filesystem::path& path);

}  // namespace wvr
