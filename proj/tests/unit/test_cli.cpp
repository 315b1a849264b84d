#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;
};

Result gba_cli(const std::string& args) {
  Result r;
  FILE* p = ::popen((std::string(GBA_EXE) + " " + args + " 2>&1").c_str(), "r");
  REQUIRE(p);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.output.append(buf, n);
  const int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

const char* kSmall = " --frames 30 --stride 400 --width 160 --height 90";

std::map<std::string, std::vector<std::uint8_t>> tree_bytes(const fs::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = gba::testing::file_bytes(e.path());
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("sim and process are reproducible") {
  const auto a = gba::testing::temp_dir("cli_a"), b = gba::testing::temp_dir("cli_b");
  REQUIRE(gba_cli("sim " + a.string() + kSmall).status == 0);
  REQUIRE(gba_cli("sim " + b.string() + kSmall).status == 0);
  REQUIRE(gba_cli("process --jobs 1 " + a.string()).status == 0);
  REQUIRE(gba_cli("process --jobs 3 " + b.string()).status == 0);
  const auto ta = tree_bytes(a), tb = tree_bytes(b);
  CHECK(ta.size() > 90);
  CHECK(ta == tb);
}

TEST_CASE("full pipeline") {
  const auto dir = gba::testing::temp_dir("cli_pipeline");
  const std::string d = dir.string();
  REQUIRE(gba_cli("sim " + d + kSmall).status == 0);
  REQUIRE(gba_cli("process " + d).status == 0);
  const Result label = gba_cli("autolabel " + d);
  CHECK(label.status == 0);
  CHECK(label.output.find("clicks") != std::string::npos);
  const Result v = gba_cli("verify " + d);
  CHECK(v.status == 0);
  CHECK(v.output.find("pass") != std::string::npos);
  CHECK(gba_cli("verify --min-density 1.01 " + d).status == 3);
  CHECK(gba_cli("stats " + d).status == 0);
  for (const char* f : {"report.txt", "report.kv", "fig4.svg", "fig5.svg", "fig6.svg", "verify.txt"})
    CHECK(fs::exists(dir / "reports" / f));
  CHECK(gba_cli("export --frame 0 --frame 3 " + d).status == 0);
  CHECK(fs::exists(dir / "labels" / "maps" / "frame_000003.pgm"));
  CHECK(gba_cli("export --frame 9999 " + d).status == 2);
  CHECK(gba_cli("gallery --count 2 " + d).status == 0);
  CHECK(std::distance(fs::directory_iterator(dir / "reports" / "gallery"), fs::directory_iterator{}) == 4);

  SUBCASE("a wrong click fails verification") {
    const fs::path log = dir / "labels" / "clicks.log";
    std::ifstream in(log);
    std::string first, rest, line;
    std::getline(in, first);
    while (std::getline(in, line)) rest += line + '\n';
    in.close();
    // Swap the class of the first click for another valid one.
    auto sp = first.find(' ', first.find(' ') + 1);
    const auto end = first.find(' ', sp + 1);
    const int cls = std::stoi(first.substr(sp + 1, end - sp - 1));
    first = first.substr(0, sp + 1) + std::to_string(cls == 1 ? 2 : 1) + first.substr(end);
    std::ofstream(log) << first << '\n' << rest;
    CHECK(gba_cli("verify " + d).status == 3);
  }
}

TEST_CASE("input errors exit with status 2") {
  CHECK(gba_cli("").status == 2);
  CHECK(gba_cli("sim").status == 2);
  CHECK(gba_cli("frobnicate x").status == 2);
  CHECK(gba_cli("process " + gba::testing::temp_dir("cli_empty").string()).status == 2);
  CHECK(gba_cli("sim " + gba::testing::temp_dir("cli_bad").string() + " --resources 5").status == 2);

  const auto dir = gba::testing::temp_dir("cli_truncated");
  REQUIRE(gba_cli("sim " + dir.string() + kSmall).status == 0);
  const fs::path cap = dir / "captures" / "session_000.gbcap";
  const auto size = fs::file_size(cap);
  fs::resize_file(cap, size - 7);
  const Result r = gba_cli("process " + dir.string());
  CHECK(r.status == 2);
  CHECK(r.output.find("session_000.gbcap") != std::string::npos);
  CHECK(r.output.find("offset") != std::string::npos);
}

}  // TEST_SUITE
