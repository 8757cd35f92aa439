#include "mrr/io.hpp"

int main(int argc, char** argv) { return mrr::run_cli(argc, argv); }
