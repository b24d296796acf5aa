#include <cstdio>

int main() {
  std::puts("restrict: no subcommand given (try --help)");
  return 2;
}
