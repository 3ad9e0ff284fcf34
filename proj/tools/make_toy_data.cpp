// Builds a synthetic embedding file for a chapter: one row per subword of
// the chapter text, Gaussian noise plus a per-label offset on annotated rows.
#include <iostream>
#include <string>

#include "narrprobe/corpus.hpp"
#include "narrprobe/embedstore.hpp"
#include "narrprobe/error.hpp"
#include "narrprobe/labels.hpp"
#include "narrprobe/rng.hpp"
#include "narrprobe/textio.hpp"
#include "narrprobe/wordpiece.hpp"

using namespace narrprobe;

int main(int argc, char** argv) {
  if (argc != 6) {
    std::cerr << "usage: make_toy_data <chapter.txt> <vocab.txt> <annotations.jsonl> <out.embf> <dim>\n";
    return 2;
  }
  try {
    const std::string text = read_file(argv[1]);
    const Vocab vocab = Vocab::from_file(argv[2]);
    const Dataset ds = load_annotations(argv[3]);
    const std::size_t dim = std::stoul(argv[5]);

    EmbeddingMatrix emb;
    emb.manifest = subword_surfaces(text, vocab);
    emb.data = RowMatrixF::Zero(static_cast<Eigen::Index>(emb.manifest.size()), static_cast<Eigen::Index>(dim));
    const AlignedDataset aligned = align(ds, emb, vocab);
    if (aligned.failures() != 0) throw Error(ErrorCode::AlignmentFailure, "toy annotations do not align");

    Rng rng(7);
    Eigen::MatrixXf offsets(static_cast<Eigen::Index>(kNumLabels), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < offsets.size(); ++i) offsets.data()[i] = static_cast<float>(2.0 * rng.gaussian());
    offsets.row(static_cast<Eigen::Index>(index_of(NarrativeLabel::Others))).setZero();
    for (Eigen::Index i = 0; i < emb.data.size(); ++i) emb.data.data()[i] = static_cast<float>(0.3 * rng.gaussian());
    for (std::size_t a = 0; a < aligned.size(); ++a) {
      for (std::size_t r = aligned.spans[a].begin; r < aligned.spans[a].end; ++r) {
        emb.data.row(static_cast<Eigen::Index>(r)) += offsets.row(aligned.y[a]);
      }
    }
    write_embeddings(emb, argv[4]);
    std::cout << emb.rows() << " x " << emb.dim() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  }
}
