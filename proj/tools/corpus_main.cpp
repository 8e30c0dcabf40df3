#include <iostream>

#include <CLI11.hpp>

#include "arc/corpus.hpp"
#include "arc/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Runs the golden fixture corpus", "arc-corpus"};
  std::string filter, root = "corpus";
  app.add_option("filter", filter, "Shell glob over fixture ids, e.g. 'count-bug*'");
  app.add_option("--root", root, "Corpus directory holding fixtures/");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    arc::CorpusReport report = arc::run_corpus(root, filter);
    std::cout << arc::format_report(report);
    return report.ok() ? 0 : 1;
  } catch (const arc::ArcError& e) {
    std::cerr << "error " << e.code() << ": " << e.what() << "\n";
    return 1;
  }
}
