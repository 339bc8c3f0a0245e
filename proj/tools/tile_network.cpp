// Builds a larger network from copies of a smaller one.
//   tile_network <in.bif> <copies> <links-per-tile> <seed> <name> <out.bif>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "causalci/bayesnet.hpp"

int main(int argc, char** argv) {
    if (argc != 7) {
        std::cerr << "usage: tile_network <in.bif> <copies> <links-per-tile> <seed> <name> <out.bif>\n";
        return 1;
    }
    std::ifstream in(argv[1]);
    if (!in) {
        std::cerr << "cannot read " << argv[1] << "\n";
        return 3;
    }
    std::stringstream text;
    text << in.rdbuf();
    try {
        const auto net = causalci::parse_bif(text.str());
        const auto tiled = causalci::tile_network(net, std::atoi(argv[2]), std::atoi(argv[3]),
                                                  std::strtoull(argv[4], nullptr, 10), argv[5]);
        std::ofstream out(argv[6]);
        out << causalci::write_bif(tiled);
        if (!out) {
            std::cerr << "cannot write " << argv[6] << "\n";
            return 3;
        }
        std::cout << tiled.size() << " nodes, " << tiled.dag().num_edges() << " edges\n";
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}
