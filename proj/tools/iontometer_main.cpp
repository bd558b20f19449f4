#include "iontometer/cli.hpp"

int main(int argc, char** argv) {
  return iontometer::cli::main_entry(argc, argv);
}
