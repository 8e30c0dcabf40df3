#pragma once

// Golden fixture corpus. Each fixture is a directory under <root>/fixtures
// holding query.arc, optional *.sql files, optional database files and
// expected.json, which lists the checks to run:
//
//   {"description": "...",
//    "checks": [{"kind": "relation", "db": "db.json", "conventions": "sql",
//                "rows": [[9]], "provenance": "paper", "note": "..."}, ...]}
//
// Check kinds: relation, bool, error, diagnostics, pattern, classify, dot.
// Every fixture also gets round-trip checks: print/parse fixed point, ALT
// JSON identity and clean binding of every SQL translation.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace arc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // failure explanation
};

struct FixtureResult {
  std::string id;
  std::vector<CheckResult> checks;

  bool passed() const;
};

struct CorpusReport {
  std::vector<FixtureResult> fixtures;

  std::size_t passed() const;
  std::size_t failed() const;
  bool ok() const { return failed() == 0; }
};

/// Ids of the fixtures under `root`/fixtures whose id matches the shell glob
/// `filter` ("" matches everything), sorted.
std::vector<std::string> list_fixtures(const std::filesystem::path& root, std::string_view filter = "");

/// Runs one fixture directory. Throws ArcError(E_FIXTURE_MALFORMED) when
/// expected.json is missing or does not follow the fixture format.
FixtureResult run_fixture(const std::filesystem::path& dir);

/// Validates every selected fixture, then runs them in id order.
CorpusReport run_corpus(const std::filesystem::path& root, std::string_view filter = "");

/// One "PASS id" / "FAIL id" line per fixture, failing checks indented below,
/// and a summary line.
std::string format_report(const CorpusReport& report);

}  // namespace arc
