// Writes a planted-rule synthetic trace in the canonical format.
#include <iostream>

#include "CLI11.hpp"
#include "fedpkt/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a planted-rule synthetic trace", "fedpkt_gen"};
  fedpkt::PlantedCorpusOptions options;
  app.add_option("-n,--packets", options.packets, "Number of packets");
  app.add_option("--noise", options.label_noise, "Label flip probability");
  app.add_option("--apps", options.apps, "Number of apps");
  app.add_option("--seed", options.seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);
  fedpkt::emit_trace(fedpkt::generate_planted_corpus(options), std::cout);
  return 0;
}
