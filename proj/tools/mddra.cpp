#include "mddra/harness.hpp"

int main(int argc, char** argv) { return mddra::harness::cli(argc, argv); }
