#include <cstdio>

int main() {
  std::printf("s2lpc: CLI under construction\n");
  return 1;
}
