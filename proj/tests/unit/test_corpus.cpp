#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "arc/corpus.hpp"
#include "arc/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kCorpus = fs::path(ARC_SOURCE_DIR) / "corpus";

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return json::parse(in);
}

class ScratchCorpus {
 public:
  ScratchCorpus() : root_(fs::temp_directory_path() / ("arc_corpus_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)))) {
    fs::create_directories(root_ / "fixtures");
  }
  ~ScratchCorpus() { fs::remove_all(root_); }

  void add(const std::string& id, const std::string& arc, const json& expected, const json& db) {
    fs::path dir = root_ / "fixtures" / id;
    fs::create_directories(dir);
    std::ofstream(dir / "query.arc") << arc;
    std::ofstream(dir / "expected.json") << expected.dump(2);
    std::ofstream(dir / "db.json") << db.dump();
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
};

const json kDb = json::parse(R"({"relations": {"R": {"schema": ["A"], "rows": [[1], [2]]}}})");

json relation_check(json rows) {
  return {{"description", "projection"},
          {"checks", {{{"kind", "relation"}, {"db", "db.json"}, {"rows", rows}, {"provenance", "trivial"},
                       {"note", "copy of R"}}}}};
}

}  // namespace

TEST_CASE("every manifest entry has fixtures") {
  json manifest = read_json(kCorpus / "manifest.json");
  REQUIRE(manifest["items"].size() > 0);
  std::set<std::string> listed;
  for (const auto& item : manifest["items"]) {
    CHECK(item["covers"].is_string());
    REQUIRE(item["fixtures"].size() > 0);
    for (const auto& id : item["fixtures"]) {
      fs::path dir = kCorpus / "fixtures" / id.get<std::string>();
      INFO(id.get<std::string>());
      CHECK(fs::exists(dir / "query.arc"));
      CHECK(fs::exists(dir / "expected.json"));
      listed.insert(id);
    }
  }
  CHECK(listed.size() >= 25);
}

TEST_CASE("every diagnostic code has a fixture that triggers exactly it") {
  json manifest = read_json(kCorpus / "manifest.json");
  std::set<std::string> triggered;
  for (const auto& id : arc::list_fixtures(kCorpus)) {
    json expected = read_json(kCorpus / "fixtures" / id / "expected.json");
    for (const auto& c : expected["checks"]) {
      if (c["kind"] == "error") triggered.insert(c["code"].get<std::string>());
      if (c["kind"] == "diagnostics" && c["codes"].size() == 1) triggered.insert(c["codes"][0].get<std::string>());
    }
  }
  for (const auto& code : manifest["diagnostic_codes"]) {
    INFO(code.get<std::string>());
    CHECK(triggered.count(code.get<std::string>()) == 1);
  }
}

TEST_CASE("every expectation carries its provenance") {
  for (const auto& id : arc::list_fixtures(kCorpus)) {
    json expected = read_json(kCorpus / "fixtures" / id / "expected.json");
    for (const auto& c : expected["checks"]) {
      INFO(id);
      CHECK(c.contains("provenance"));
      CHECK(c.contains("note"));
    }
  }
}

TEST_CASE("filters select fixtures by glob") {
  CHECK(arc::list_fixtures(kCorpus, "count-bug*").size() == 3);
  arc::CorpusReport count_bug = arc::run_corpus(kCorpus, "count-bug*");
  CHECK(count_bug.passed() == 3);
  CHECK(count_bug.ok());
  arc::CorpusReport hella = arc::run_corpus(kCorpus, "hella*");
  CHECK(hella.fixtures.size() == 3);
  CHECK(hella.ok());
  CHECK(arc::run_corpus(kCorpus, "no-such-fixture*").fixtures.empty());
}

TEST_CASE("wrong expectations fail and are reported") {
  ScratchCorpus scratch;
  scratch.add("good", "{ Q(A) | exists r in R [ Q.A = r.A ] }", relation_check(json::parse("[[2], [1]]")), kDb);
  scratch.add("bad", "{ Q(A) | exists r in R [ Q.A = r.A ] }", relation_check(json::parse("[[1]]")), kDb);
  arc::CorpusReport report = arc::run_corpus(scratch.root());
  REQUIRE(report.fixtures.size() == 2);
  CHECK(report.passed() == 1);
  CHECK_FALSE(report.ok());
  std::string text = arc::format_report(report);
  CHECK(text.find("FAIL bad") != std::string::npos);
  CHECK(text.find("PASS good") != std::string::npos);
  CHECK(text.find("2 fixtures, 1 passed, 1 failed") != std::string::npos);
}

TEST_CASE("malformed fixtures are rejected before anything runs") {
  ScratchCorpus scratch;
  json expected = relation_check(json::parse("[[1], [2]]"));
  expected["checks"][0].erase("provenance");
  scratch.add("no-provenance", "{ Q(A) | exists r in R [ Q.A = r.A ] }", expected, kDb);
  CHECK_THROWS_WITH_AS(arc::run_corpus(scratch.root()), doctest::Contains("provenance"), arc::ArcError);
  try {
    arc::run_corpus(scratch.root());
  } catch (const arc::ArcError& e) {
    CHECK(e.code() == "E_FIXTURE_MALFORMED");
  }

  ScratchCorpus missing_file;
  json dangling = relation_check(json::parse("[]"));
  dangling["checks"][0]["db"] = "absent.json";
  missing_file.add("dangling", "{ Q(A) | exists r in R [ Q.A = r.A ] }", dangling, kDb);
  CHECK_THROWS_AS(arc::run_corpus(missing_file.root()), arc::ArcError);
}
