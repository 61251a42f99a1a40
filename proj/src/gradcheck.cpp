#include "amcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "amcnn/errors.hpp"
#include "parallel.hpp"

namespace amcnn {

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

void update_entry(GradCheckEntry& entry, double analytic, double numeric,
                  const GradCheckOptions& options) {
  entry.max_abs_error = std::max(entry.max_abs_error, std::abs(analytic - numeric));
  const double rel = relative_error(analytic, numeric, options.floor);
  // NaN must fail, so compare with the negated form.
  if (!(rel <= options.tolerance)) entry.passed = false;
  if (std::isnan(rel) || rel > entry.max_rel_error) entry.max_rel_error = rel;
  ++entry.count;
}

}  // namespace

GradCheckReport check_gradients(std::vector<Tensor> leaves,
                                const std::function<Tensor(Tape&)>& fn,
                                const GradCheckOptions& options) {
  for (auto& leaf : leaves) {
    if (!leaf.requires_grad()) throw ArgumentError("check_gradients: leaf without gradient");
    leaf.zero_grad();
  }
  {
    Tape tape;
    tape.backward(fn(tape));
  }
  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (std::size_t p = 0; p < leaves.size(); ++p) {
    GradCheckEntry entry;
    entry.name = "leaf" + std::to_string(p);
    auto values = leaves[p].mutable_values();
    const auto grad = leaves[p].grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      Tape plain(false);
      values[i] = saved + options.eps;
      const double up = fn(plain).item();
      values[i] = saved - options.eps;
      const double down = fn(plain).item();
      values[i] = saved;
      update_entry(entry, grad[i], (up - down) / (2.0 * options.eps), options);
    }
    report.entries.push_back(entry);
  }
  return report;
}

GradCheckReport grad_check(const ModelConfig& config, const ModelParams& params,
                           const EncodedBatch& batch, const GradCheckOptions& options) {
  const SeedStream rng(0);
  Gradients analytic;
  loss_and_gradients(batch, params, config, rng, false, analytic, options.threads);

  const auto named = params.named();
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < named.size(); ++p)
    for (std::size_t i = 0; i < named[p].tensor.size(); ++i) coords.emplace_back(p, i);

  // Each worker perturbs its own copy of the parameters.
  std::vector<double> numeric(coords.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, coords.size()));
  detail::parallel_for(workers, workers, [&](std::size_t w) {
    ModelParams local = params.clone();
    auto local_named = local.named();
    for (std::size_t c = w; c < coords.size(); c += workers) {
      const auto [p, i] = coords[c];
      auto values = local_named[p].tensor.mutable_values();
      const double saved = values[i];
      values[i] = saved + options.eps;
      const double up = forward(batch, local, config, rng, false).loss;
      values[i] = saved - options.eps;
      const double down = forward(batch, local, config, rng, false).loss;
      values[i] = saved;
      numeric[c] = (up - down) / (2.0 * options.eps);
    }
  });

  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (const auto& n : named) report.entries.push_back({n.name});
  for (std::size_t c = 0; c < coords.size(); ++c) {
    const auto [p, i] = coords[c];
    update_entry(report.entries[p], analytic[p][i], numeric[c], options);
  }
  return report;
}

ModelConfig tiny_config(AttentionMode mode, std::size_t channels) {
  ModelConfig c;
  c.hidden_size = 4;
  c.embedding_dim = 5;
  c.channels = channels;
  c.mode = mode;
  c.filter_widths = {2, 3};
  c.filter_maps = 3;
  c.classes = 3;
  c.dropout_embedding = 0.0;
  c.dropout_cnn_input = 0.0;
  c.dropout_penultimate = 0.0;
  c.max_len = 7;
  return c;
}

EncodedBatch random_batch(std::size_t size, std::size_t len, std::size_t vocab_size,
                          std::size_t classes, SeedStream rng) {
  if (vocab_size < 2) throw ArgumentError("random_batch: vocabulary needs a word besides UNK");
  Rng engine = rng.engine();
  std::uniform_int_distribution<int> word(1, static_cast<int>(vocab_size) - 1);
  std::uniform_int_distribution<int> label(0, static_cast<int>(classes) - 1);
  std::uniform_int_distribution<std::size_t> pads(0, len / 2);
  EncodedBatch batch;
  batch.len = len;
  for (std::size_t b = 0; b < size; ++b) {
    const std::size_t pad = pads(engine);
    EncodedRow row;
    for (std::size_t t = 0; t < len; ++t) {
      row.pad_mask.push_back(t < pad);
      row.ids.push_back(t < pad ? Vocabulary::kUnkId : word(engine));
    }
    batch.rows.push_back(std::move(row));
    batch.labels.push_back(label(engine));
  }
  return batch;
}

GradCheckReport tiny_grad_check(const ModelConfig& config, const GradCheckOptions& options) {
  constexpr std::size_t kVocab = 12;
  const SeedStream root(config.seed);
  Rng engine = root.child(0).engine();
  std::uniform_real_distribution<double> dist(-0.25, 0.25);
  std::vector<double> table(kVocab * config.embedding_dim);
  for (double& v : table) v = dist(engine);
  const Tensor embedding = Tensor::matrix(kVocab, config.embedding_dim, std::move(table));
  ModelParams params = ModelParams::init(config, embedding, root.child(1));
  // Nonzero biases so every bias path carries a generic gradient.
  for (auto& n : params.named()) {
    if (n.kind != ParamKind::bias) continue;
    for (double& v : n.tensor.mutable_values()) v = 0.1 * dist(engine);
  }
  const std::size_t len = config.max_len == 0 ? 7 : config.max_len;
  const EncodedBatch batch = random_batch(4, len, kVocab, config.classes, root.child(2));
  return grad_check(config, params, batch, options);
}

}  // namespace amcnn
