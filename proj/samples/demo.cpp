// Small end-to-end run on the bundled questions: tokenize, build a
// vocabulary, fit a tiny model on the pairs, then decode each question.
//
//   demo [questions.jsonl]

#include <fstream>
#include <iostream>
#include <string>

#include "mathsum/corpus/jsonl.hpp"
#include "mathsum/decoding/beam_search.hpp"
#include "mathsum/eval/report.hpp"
#include "mathsum/training/trainer.hpp"
#include "mathsum/vocab/vocabulary.hpp"

using namespace mathsum;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : MATHSUM_SAMPLE_DATA;
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << '\n';
    return 2;
  }
  const auto ingested = corpus::ingest_lines(in);
  std::cout << "kept " << ingested.pairs.size() << " of " << ingested.total << " pairs\n";

  const auto v = vocab::build_vocab(ingested.pairs);
  std::vector<vocab::EncodedExample> data;
  for (const auto& p : ingested.pairs) data.push_back(vocab::encode(p, v));

  model::Hyperparams hp;
  hp.emb_dim = 16;
  hp.enc_hidden = 64;
  hp.dec_hidden = 64;
  hp.num_heads = 2;
  hp.ffn_dim = 32;
  hp.dropout = 0.0;
  model::Network<double> net(hp, v.size(), 1);

  training::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 300;
  cfg.patience = 300;
  cfg.stop_below_train_loss = 0.1;
  const auto result = training::train(net, data, data, cfg);
  std::cout << "trained " << result.epochs_run << " epochs, loss " << result.best_val_loss << "\n\n";

  decoding::BeamConfig bc;
  bc.beam = 3;
  bc.min_len = 0;
  bc.max_len = 30;
  std::vector<eval::Tokens> hyps, golds;
  for (std::size_t i = 0; i < data.size(); ++i) {
    decoding::NetworkStepper<double> stepper(result.best, data[i]);
    const auto r = decoding::beam_search(stepper, bc);
    hyps.push_back(vocab::decode_ids(r.ids, v, data[i].oov_list));
    golds.push_back(corpus::surfaces(ingested.pairs[i].target));
    std::cout << ingested.pairs[i].id << "\t" << corpus::join_surfaces(ingested.pairs[i].source).substr(0, 60)
              << "\n\t-> ";
    for (const auto& t : hyps.back()) std::cout << t << ' ';
    std::cout << '\n';
  }
  std::cout << '\n' << eval::evaluate(hyps, golds).to_table();
  return 0;
}
