#include "honet/cli.hpp"

int main(int argc, char** argv) {
    return honet::cli_main(argc, argv);
}
