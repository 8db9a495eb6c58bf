// Runs every acceptance criterion at its pinned seed and tolerance through
// the C API. One line per criterion; exit status is nonzero if any fails.
// Optional argument: path for the JSON report.

#include <cstdio>
#include <fstream>

#include "spikenet/spikenet.h"

namespace {

void print_line(int id, const char* name, int pass, const char* detail, double seconds, void*) {
  std::printf("%s #%d %s (%.1fs): %s\n", pass ? "PASS" : "FAIL", id, name, seconds, detail);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  spikenet_validate_options opt;
  spikenet_validate_options_init(&opt);
  opt.on_result = print_line;
  spikenet_report* rep = nullptr;
  const spikenet_status st = spikenet_validate(&opt, &rep);
  if (st != SPIKENET_OK) {
    std::fprintf(stderr, "validation error (%s): %s\n", spikenet_status_name(st), spikenet_last_error());
    return 2;
  }
  const size_t n = spikenet_report_count(rep);
  size_t ok = 0;
  for (size_t i = 0; i < n; ++i) {
    int pass = 0;
    spikenet_report_criterion(rep, i, nullptr, &pass, nullptr, nullptr);
    ok += pass ? 1 : 0;
  }
  std::printf("%zu/%zu acceptance criteria passed\n", ok, n);
  if (argc > 1) std::ofstream(argv[1]) << spikenet_report_json(rep);
  const int passed = spikenet_report_passed(rep);
  spikenet_report_free(rep);
  return passed ? 0 : 1;
}
