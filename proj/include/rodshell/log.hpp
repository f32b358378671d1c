#pragma once

#include <string>

namespace rodshell {

// Warnings go to stderr unless silenced; the counter lets tests observe them.
void warn(const std::string& message);
int warning_count();
void set_warnings_quiet(bool quiet);

}  // namespace rodshell
