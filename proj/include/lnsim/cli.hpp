#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lnsim {

/// Command-line front end. `args` excludes the program name. Returns the
/// process exit code: 0 on success, 2 on usage or scenario errors.
///
///   run   <scenario> [--seed N] [--out PATH] [--format csv|lines]
///   stats <scenario> [--seed N] [--out PATH]
///   trace <scenario> <channel> [--seed N] [--out PATH]
///   demo  [--out PATH]
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The two-party walkthrough printed by `demo`.
void write_demo(std::ostream& out);

}  // namespace lnsim
