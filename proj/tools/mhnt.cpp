#include "mhnt/cli.hpp"

int main(int argc, char** argv) {
    return mhnt::cli::run(argc, argv);
}
