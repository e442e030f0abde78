#include <csignal>

#include "sentinel/cli/app.hpp"

namespace {
void on_signal(int) { sentinel::cli::stop_flag().store(true); }
}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return sentinel::cli::run_cli(argc, argv);
}
