#include "opsplit/apps.hpp"

int main(int argc, char** argv) {
  return opsplit::run_bench_main(argc, argv);
}
