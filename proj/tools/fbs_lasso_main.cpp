#include "opsplit/apps.hpp"

int main(int argc, char** argv) {
  return opsplit::run_app_main(opsplit::AppId::fbs_lasso, argc, argv);
}
