#include "cli.hpp"

int main(int argc, char** argv)
{
  return hetdecon::cli::run(argc, argv, std::cout, std::cerr);
}
