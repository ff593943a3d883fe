#include "glov/cli.hpp"

int main(int argc, char** argv) {
    return glov::run_cli(argc, argv);
}
