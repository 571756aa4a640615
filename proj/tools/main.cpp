#include "custemb/app.hpp"

int main(int argc, char** argv) { return custemb::run_cli(argc, argv); }
