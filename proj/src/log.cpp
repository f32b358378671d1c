#include "rodshell/log.hpp"

#include <atomic>
#include <iostream>

namespace rodshell {
namespace {
std::atomic<int> g_count{0};
std::atomic<bool> g_quiet{false};
}  // namespace

void warn(const std::string& message) {
  ++g_count;
  if (!g_quiet) std::cerr << "warning: " << message << "\n";
}

int warning_count() { return g_count; }

void set_warnings_quiet(bool quiet) { g_quiet = quiet; }

}  // namespace rodshell
