#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "paper_queries.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = arc::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string golden(const std::string& name) {
  std::ifstream in(std::string(ARC_SOURCE_DIR) + "/tests/golden/" + name);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("arc_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return (path_ / name).string();
  }

 private:
  fs::path path_;
};

}  // namespace

TEST_CASE("demos reproduce their golden output") {
  for (const char* name : {"count-bug", "conventions", "matrix", "unique-set"}) {
    Outcome o = run({"demo", name});
    CHECK(o.code == 0);
    CHECK(o.out == golden(std::string("demo_") + name + ".txt"));
  }
  CHECK(golden("demo_count-bug.txt").find("ARC ∅") != std::string::npos);
  CHECK(golden("demo_conventions.txt").find("{(1, null)}") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"eval", "q.arc"}).code == 2);
  CHECK(run({"eval", "q.arc", "--db", "d.json", "--semantics", "list"}).code == 2);
  CHECK(run({"demo", "nothing"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("commands on files") {
  TempDir dir;
  std::string fio = dir.write("fio.arc", paper::kGroupedSum);
  std::string foi = dir.write("foi.arc", paper::kGroupedSumFoi);
  std::string db = dir.write("db.json", R"({"relations": {"R": {"schema": ["A","B"], "rows": [[1,2],[1,3],[2,5]]}}})");

  Outcome parsed = run({"parse", fio});
  CHECK(parsed.code == 0);
  CHECK(nlohmann::json::parse(parsed.out).contains("main"));

  CHECK(run({"check", fio}).out == "ok\n");
  Outcome bad = run({"check", dir.write("bad.arc", "{ Q(A) | exists r in R [ Q.A = t.A ] }")});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("E_UNBOUND_VAR") != std::string::npos);
  Outcome syntax = run({"parse", dir.write("syntax.arc", "{ Q(A) | exists r in R [ Q.A = ")});
  CHECK(syntax.code == 1);
  CHECK(syntax.err.find("E_PARSE") != std::string::npos);
  CHECK(run({"parse", "/nonexistent/q.arc"}).code == 1);

  Outcome table = run({"eval", fio, "--db", db});
  CHECK(table.code == 0);
  CHECK(table.out.find("(2 rows)") != std::string::npos);
  Outcome as_json = run({"eval", foi, "--db", db, "--semantics", "set", "--out", "json"});
  CHECK(nlohmann::json::parse(as_json.out)["rows"] == nlohmann::json::parse("[[1,5],[2,5]]"));

  Outcome diff = run({"diff", fio, foi});
  CHECK(diff.code == 1);
  CHECK(diff.out.rfind("patterns differ at main/q0", 0) == 0);
  CHECK(run({"diff", fio, fio}).out == "patterns equal\n");

  CHECK(run({"classify", foi}).out == "main/q0/x/q0 FOI\n");
  CHECK(run({"classify", fio}).out == "main/q0 FIO\n");

  Outcome dot = run({"render", fio});
  CHECK(dot.out == golden("grouped_sum.dot"));
  CHECK(nlohmann::json::parse(run({"render", fio, "--format", "json"}).out)["regions"].size() == 3);

  std::string sql = dir.write("q.sql", paper::kSqlGroupedSum);
  Outcome translated = run({"from-sql", sql});
  CHECK(translated.code == 0);
  CHECK(translated.out.find("group(r.A)") != std::string::npos);
  CHECK(run({"diff", sql, fio}).out == "patterns equal\n");
  Outcome unsupported = run({"from-sql", dir.write("o.sql", "select R.A from R order by R.A")});
  CHECK(unsupported.code == 1);
  CHECK(unsupported.err.find("E_UNSUPPORTED_SQL") != std::string::npos);
}
