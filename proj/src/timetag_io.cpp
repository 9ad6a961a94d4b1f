#include "wvr/timetag_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "text_format.hpp"
#include "wvr/errors.hpp"

namespace wvr {

namespace {

constexpr std::string_view kMagic = "# wvr-timetags 1";
constexpr std::string_view kColumns = "timestamp_ns,detector,pass_index";

TimeTag parse_record(std::string_view line, std::size_t line_no) {
  const auto c1 = line.find(',');
  const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
  if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
    throw FormatError(line_no, "expected 3 comma-separated fields");
  }
  TimeTag tag;
  const auto ts = text::parse_number<std::int64_t>(line.substr(0, c1));
  if (!ts || *ts < 0) throw FormatError(line_no, "timestamp must be a nonnegative integer");
  tag.timestamp_ns = *ts;

  const auto det = line.substr(c1 + 1, c2 - c1 - 1);
  if (det == "L") {
    tag.detector = Detector::Left;
  } else if (det == "R") {
    tag.detector = Detector::Right;
  } else {
    throw FormatError(line_no, "detector must be L or R");
  }

  const auto pass = line.substr(c2 + 1);
  if (pass == "-") {
    tag.pass_index = TimeTag::kUnknownPass;
  } else {
    const auto p = text::parse_number<std::int32_t>(pass);
    if (!p || *p < 1) throw FormatError(line_no, "pass index must be a positive integer or '-'");
    tag.pass_index = *p;
  }
  return tag;
}

}  // namespace

void write_timetags(const TimeTagSet& tags, std::ostream& out) {
  for (const auto& [key, value] : tags.metadata) {
    if (key.empty() || key.find_first_of("=\n\r") != std::string::npos ||
        value.find_first_of("\n\r") != std::string::npos) {
      throw InvalidArgument("metadata entry '" + key + "' cannot be written as key=value");
    }
  }
  out << kMagic << '\n';
  for (const auto& [key, value] : tags.metadata) out << "# " << key << '=' << value << '\n';
  out << kColumns << '\n';

  std::string buf;
  buf.reserve(1 << 16);
  char num[24];
  for (const auto& tag : tags.records) {
    auto res = std::to_chars(num, num + sizeof num, tag.timestamp_ns);
    buf.append(num, res.ptr);
    buf += tag.detector == Detector::Left ? ",L," : ",R,";
    if (tag.pass_index == TimeTag::kUnknownPass) {
      buf += '-';
    } else {
      res = std::to_chars(num, num + sizeof num, tag.pass_index);
      buf.append(num, res.ptr);
    }
    buf += '\n';
    if (buf.size() > (1 << 16) - 64) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_timetags(const TimeTagSet& tags, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_timetags(tags, out);
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

TimeTagSet read_timetags(std::istream& in) {
  TimeTagSet tags;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw FormatError(1, "empty input");
  ++line_no;
  if (line != kMagic) throw FormatError(line_no, "missing '# wvr-timetags 1' header");

  bool columns_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!columns_seen) {
      if (line.starts_with("# ")) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 2) throw FormatError(line_no, "header line must be '# key=value'");
        auto [it, inserted] = tags.metadata.emplace(line.substr(2, eq - 2), line.substr(eq + 1));
        if (!inserted) throw FormatError(line_no, "duplicate metadata key '" + it->first + "'");
        continue;
      }
      if (line != kColumns) throw FormatError(line_no, "expected column header '" + std::string(kColumns) + "'");
      columns_seen = true;
      continue;
    }
    if (line.empty()) throw FormatError(line_no, "blank line inside records");
    const TimeTag tag = parse_record(line, line_no);
    if (!tags.records.empty() && tag.timestamp_ns < tags.records.back().timestamp_ns) {
      throw FormatError(line_no, "timestamps must be nondecreasing");
    }
    tags.records.push_back(tag);
  }
  if (!columns_seen) throw FormatError(line_no + 1, "missing column header");
  return tags;
}

TimeTagSet read_timetags(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return read_timetags(in);
}

}  // namespace wvr
