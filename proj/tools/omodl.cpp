#include <omodl/cli.hpp>

int main(int argc, char **argv) { return omodl::cli::dispatch(argc, argv); }
