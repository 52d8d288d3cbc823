// Apache License, Version 2.0, refer to LICENSE.txt

#include "topicfb/cli.hpp"

int main(int argc, char** argv) { return topicfb::run(argc, argv); }
