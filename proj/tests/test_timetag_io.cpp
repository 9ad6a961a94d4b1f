#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "wvr/errors.hpp"
#include "wvr/timetag_io.hpp"

using namespace wvr;

namespace {

TimeTagSet sample_set() {
  TimeTagSet s;
  s.metadata = {{"acquisition_time", "0.5"}, {"mode", "multi"}, {"seed", "7"}};
  s.records = {{0, Detector::Left, 1}, {4003, Detector::Right, TimeTag::kUnknownPass}, {4003, Detector::Left, 27}};
  return s;
}

int error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_timetags(in);
  } catch (const FormatError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("round trip through a stream") {
  const TimeTagSet s = sample_set();
  std::stringstream buf;
  write_timetags(s, buf);
  CHECK(buf.str() ==
        "# wvr-timetags 1\n"
        "# acquisition_time=0.5\n"
        "# mode=multi\n"
        "# seed=7\n"
        "timestamp_ns,detector,pass_index\n"
        "0,L,1\n"
        "4003,R,-\n"
        "4003,L,27\n");
  CHECK(read_timetags(buf) == s);
}

TEST_CASE("empty record set") {
  TimeTagSet s;
  s.metadata["acquisition_time"] = "1";
  std::stringstream buf;
  write_timetags(s, buf);
  const TimeTagSet back = read_timetags(buf);
  CHECK(back.records.empty());
  CHECK(back == s);
}

TEST_CASE("round trip through a file") {
  const auto path = std::filesystem::temp_directory_path() / "wvr_test_timetags.csv";
  write_timetags(sample_set(), path);
  CHECK(read_timetags(path) == sample_set());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_timetags(path), Error);
}

TEST_CASE("malformed input reports the line") {
  const std::string head = "# wvr-timetags 1\n# acquisition_time=1\ntimestamp_ns,detector,pass_index\n";
  CHECK(error_line("") == 1);
  CHECK(error_line("hello\n") == 1);
  CHECK(error_line(head + "5,L,1\n3,R,1\n") == 5);
  CHECK(error_line(head + "5,X,1\n") == 4);
  CHECK(error_line(head + "5,L\n") == 4);
  CHECK(error_line(head + "-5,L,1\n") == 4);
  CHECK(error_line(head + "5,L,0\n") == 4);
  CHECK(error_line(head + "5,L,1\n\n6,L,1\n") == 5);
  CHECK(error_line(head + "5.5,L,1\n") == 4);
  CHECK(error_line("# wvr-timetags 1\n# a=1\n# a=2\n") == 3);
  CHECK(error_line("# wvr-timetags 1\n# novalue\n") == 2);
  CHECK(error_line("# wvr-timetags 1\n# a=1\n") == 3);
}

TEST_CASE("unwritable metadata") {
  TimeTagSet s;
  s.metadata["bad\nkey"] = "1";
  std::stringstream buf;
  CHECK_THROWS_AS(write_timetags(s, buf), InvalidArgument);
}

TEST_CASE("validate") {
  TimeTagSet s = sample_set();
  CHECK_NOTHROW(s.validate());
  CHECK(s.acquisition_time() == doctest::Approx(0.5));
  s.records.push_back({10, Detector::Left, 1});
  CHECK_THROWS_AS(s.validate(), FormatError);
  s.metadata.clear();
  CHECK_THROWS_AS(s.acquisition_time(), InvalidConfig);
}
