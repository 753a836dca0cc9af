#include "pipeline.hpp"

int main(int argc, char** argv) { return newsfactor::cli::run(argc, argv); }
