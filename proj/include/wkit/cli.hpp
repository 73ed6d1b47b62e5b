#ifndef WKIT_CLI_HPP
#define WKIT_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace wkit {

// Full command-line front end, callable in-process.  args excludes the
// program name.  Returns the process exit code: 0 success, 2 validation
// failure, 3 mismatch against reference data, 4 capability gap.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace wkit

#endif
