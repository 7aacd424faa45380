// Writes synthetic note clips for the CLI smoke test:
//   make_clips <dir> <count> <seconds>

#include "test_support.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    if (argc != 4) {
        std::cerr << "usage: make_clips <dir> <count> <seconds>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    const int count = std::atoi(argv[2]);
    const double seconds = std::atof(argv[3]);
    std::filesystem::create_directories(dir);
    for (int i = 0; i < count; ++i)
        actfeat::write_wav_float32(actfeat::testkit::note_clip(static_cast<std::uint64_t>(i + 1), seconds),
                                   dir / ("clip" + std::to_string(i) + ".wav"));
    return 0;
}
