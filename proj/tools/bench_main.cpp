// Benchmark comparing the OpenMP kernels against their serial reference
// implementations: batch feature extraction, forest fitting, and cliff-pair
// mining. Verifies that both paths produce identical results before timing.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <omp.h>

#include "treekd/descriptors.hpp"
#include "treekd/eval.hpp"
#include "treekd/forest.hpp"
#include "treekd/pattern.hpp"
#include "treekd/rng.hpp"

using namespace treekd;

namespace {

// Synthetic corpus: scaffold templates decorated with substituents. Prefixes
// bond their last atom to the ring, so only chain-extendable ones qualify.
std::vector<std::string> make_smiles(int count) {
  const std::vector<std::string> cores = {
      "c1ccccc1",    "c1ccncc1",   "c1ccsc1",     "C1CCCCC1",   "c1ccc2ccccc2c1",
      "C1CCNCC1",    "c1ccoc1",    "C1CCOC1",     "c1cnc2ccccc2c1",
  };
  const std::vector<std::string> prefixes = {
      "", "C", "CC", "CCC", "O", "N", "CO", "CN", "C=C", "NC(=O)", "C(=O)O", "OCC",
  };
  const std::vector<std::string> suffixes = {
      "",        "C",      "CC",      "CCC",    "O",        "N",       "Cl",
      "Br",      "C(=O)O", "C(=O)N",  "S(=O)=O", "C#N",     "OC",      "C(F)(F)F",
      "CN",      "C=C",    "CO",      "CCl",    "C(=O)OC",  "NC(=O)C",
  };
  std::vector<std::string> out;
  out.reserve(count);
  Rng rng(12345);
  for (int i = 0; i < count; ++i) {
    std::string smiles = prefixes[rng.next_below(prefixes.size())];
    smiles += cores[rng.next_below(cores.size())];
    smiles += suffixes[rng.next_below(suffixes.size())];
    out.push_back(std::move(smiles));
  }
  return out;
}

FunctionalGroupLibrary make_library() {
  return FunctionalGroupLibrary::from_entries(
      {{"aromatic carbon", "c"},
       {"aromatic nitrogen", "n"},
       {"aromatic sulfur", "s"},
       {"aromatic oxygen", "o"},
       {"hydroxyl", "[OX2H1]"},
       {"primary amine", "[NX3H2]"},
       {"carbonyl", "[CX3]=O"},
       {"carboxylic acid", "[CX3](=O)[OX2H1]"},
       {"ester", "[CX3](=O)[OX2H0]"},
       {"amide", "[CX3](=O)[NX3]"},
       {"nitrile", "C#N"},
       {"chloro", "Cl"},
       {"bromo", "Br"},
       {"trifluoromethyl", "[CX4](F)(F)F"},
       {"sulfonyl", "[SX4](=O)=O"},
       {"ether", "[OX2H0]"},
       {"methyl", "[CX4H3]"},
       {"ring atom", "[R]"},
       {"chain carbon", "[C;R0]"},
       {"alkene", "C=C"}},
      "bench");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-24s serial %8.3fs   openmp %8.3fs   speedup %5.2fx   %s\n", name, serial_s,
              parallel_s, serial_s / parallel_s, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int n_molecules = 4000;
  int n_trees = 64;
  if (argc > 1) n_molecules = std::atoi(argv[1]);
  if (argc > 2) n_trees = std::atoi(argv[2]);

  std::printf("molecules %d, trees %d, omp threads %d\n\n", n_molecules, n_trees,
              omp_get_max_threads());

  const FunctionalGroupLibrary library = make_library();
  const auto smiles = make_smiles(n_molecules);
  std::vector<Molecule> mols;
  mols.reserve(smiles.size());
  for (const std::string& s : smiles) mols.push_back(parse_molecule(s));

  // Batch feature extraction.
  auto t0 = std::chrono::steady_clock::now();
  const auto features_serial = extract_features_batch_serial(mols, library);
  const double extract_serial = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const auto features = extract_features_batch(mols, library);
  const double extract_parallel = seconds_since(t0);
  bool same = features.size() == features_serial.size();
  for (std::size_t i = 0; same && i < features.size(); ++i)
    same = features[i].counts == features_serial[i].counts;
  report("extract_features_batch", extract_serial, extract_parallel, same);

  // Forest fitting. Labels come from a fixed rule so trees have structure;
  // every 13th label is flipped so cliff pairs exist in the corpus.
  std::vector<double> labels(mols.size());
  const int acid = library.index_of("carboxylic acid");
  const int halo = library.index_of("chloro");
  for (std::size_t i = 0; i < mols.size(); ++i) {
    labels[i] = features[i].at(acid) + features[i].at(halo) > 0 ? 1.0 : 0.0;
    if (i % 13 == 0) labels[i] = 1.0 - labels[i];
  }

  TreeParams params = default_params(TaskKind::Classification);
  t0 = std::chrono::steady_clock::now();
  const RandomForest forest_serial = fit_forest_serial(features, labels, n_trees, params, 7);
  const double fit_serial = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const RandomForest forest = fit_forest(features, labels, n_trees, params, 7);
  const double fit_parallel = seconds_since(t0);
  same = forest_to_json(forest, "bench", library.size()) ==
         forest_to_json(forest_serial, "bench", library.size());
  report("fit_forest", fit_serial, fit_parallel, same);

  // Cliff-pair mining.
  std::vector<MoleculeRecord> records(mols.size());
  std::vector<Fingerprint> fps;
  fps.reserve(mols.size());
  for (std::size_t i = 0; i < mols.size(); ++i) {
    records[i].smiles = smiles[i];
    records[i].label = labels[i];
    records[i].id = static_cast<int>(i);
    fps.push_back(fingerprint(mols[i]));
  }
  t0 = std::chrono::steady_clock::now();
  const auto pairs_serial = find_cliff_pairs_serial(records, fps, 0.8);
  const double cliff_serial = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const auto pairs = find_cliff_pairs(records, fps, 0.8);
  const double cliff_parallel = seconds_since(t0);
  same = pairs.size() == pairs_serial.size();
  for (std::size_t i = 0; same && i < pairs.size(); ++i)
    same = pairs[i].id_a == pairs_serial[i].id_a && pairs[i].id_b == pairs_serial[i].id_b &&
           pairs[i].similarity == pairs_serial[i].similarity;
  report("find_cliff_pairs", cliff_serial, cliff_parallel, same);

  std::printf("\n%zu cliff pairs found\n", pairs.size());
  return 0;
}
