#include "iclv/cli.hpp"

int main(int argc, char** argv) { return iclv::run(argc, argv); }
