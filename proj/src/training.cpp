#include "attnseg/training.h"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "attnseg/error.h"

namespace attnseg {

std::string to_string(CheckpointPolicy p) {
  return p == CheckpointPolicy::total_loss ? "total_loss" : "top_level_loss";
}

CheckpointPolicy parse_checkpoint_policy(const std::string& name) {
  if (name == "total_loss") return CheckpointPolicy::total_loss;
  if (name == "top_level_loss") return CheckpointPolicy::top_level_loss;
  throw ConfigError("train.checkpoint_policy: unknown value '" + name +
                    "' (expected total_loss, top_level_loss)");
}

void validate(const TrainConfig& c) {
  if (!(c.lr > 0)) throw ConfigError("train.lr must be > 0");
  if (c.physical_batch < 1) throw ConfigError("train.physical_batch must be >= 1");
  if (c.accumulation_steps < 1) throw ConfigError("train.accumulation_steps must be >= 1");
  if (c.patience_epochs < 1) throw ConfigError("train.patience_epochs must be >= 1");
  if (c.max_epochs < 1) throw ConfigError("train.max_epochs must be >= 1");
}

bool EarlyStopping::update(int epoch, double monitored) {
  improved_ = best_epoch_ == 0 || monitored < best_;
  if (improved_) {
    best_ = monitored;
    best_epoch_ = epoch;
  }
  return epoch - best_epoch_ >= patience_;
}

template <typename T>
Batch<T> make_batch(std::span<const Volume* const> samples, std::int64_t classes) {
  if (samples.empty()) throw InputError("make_batch: no samples");
  const Dims d = samples.front()->dims;
  const std::int64_t B = static_cast<std::int64_t>(samples.size()), N = dims_voxels(d);
  Batch<T> batch{Tensor<T>(Shape{B, 1, d[0], d[1], d[2]}), Tensor<T>(Shape{B, classes, d[0], d[1], d[2]})};
  for (std::int64_t b = 0; b < B; ++b) {
    const Volume& v = *samples[static_cast<std::size_t>(b)];
    if (v.dims != d || static_cast<std::int64_t>(v.data.size()) != N) {
      throw InputError("make_batch: volume '" + v.id + "' has dims " + dims_to_string(v.dims) +
                       ", expected " + dims_to_string(d));
    }
    if (!v.has_label()) throw InputError("make_batch: volume '" + v.id + "' has no annotation");
    T* img = batch.image.raw() + b * N;
    T* tgt = batch.target.raw() + b * classes * N;
    for (std::int64_t i = 0; i < N; ++i) {
      img[i] = static_cast<T>(v.data[static_cast<std::size_t>(i)]);
      const std::int64_t cls = v.label[static_cast<std::size_t>(i)];
      if (cls >= classes) throw InputError("make_batch: label exceeds class count");
      tgt[cls * N + i] = T{1};
    }
  }
  return batch;
}

namespace {

template <typename T>
PassLosses to_values(const DeepSupervisionLoss<T>& l) {
  PassLosses out{static_cast<double>(l.total.item()), {}};
  for (const auto& v : l.levels) out.levels.push_back(static_cast<double>(v.item()));
  return out;
}

template <typename T>
DeepSupervisionLoss<T> batch_loss(const ModelOutput<T>& out, const Batch<T>& batch, const LossConfig& loss) {
  const std::vector<Tensor<T>> targets =
      downsample_target(batch.target, static_cast<int>(out.maps.size()));
  return deep_supervision_loss<T>(out.maps, targets, loss);
}

void add_scaled(PassLosses& acc, const PassLosses& x, double w) {
  acc.total += w * x.total;
  if (acc.levels.size() < x.levels.size()) acc.levels.resize(x.levels.size(), 0.0);
  for (std::size_t i = 0; i < x.levels.size(); ++i) acc.levels[i] += w * x.levels[i];
}

template <typename T>
std::vector<Batch<T>> batches_of(const std::vector<Volume>& v, int size, std::int64_t classes) {
  std::vector<Batch<T>> out;
  for (std::size_t i = 0; i < v.size(); i += static_cast<std::size_t>(size)) {
    std::vector<const Volume*> ptrs;
    for (std::size_t j = i; j < std::min(v.size(), i + static_cast<std::size_t>(size)); ++j) {
      ptrs.push_back(&v[j]);
    }
    out.push_back(make_batch<T>(std::span<const Volume* const>(ptrs), classes));
  }
  return out;
}

}  // namespace

template <typename T>
PassLosses forward_backward(Model<T>& model, const Batch<T>& batch, const LossConfig& loss,
                            const ForwardContext& ctx) {
  Tape<T> tape;
  TapeScope<T> scope(tape);
  const ModelOutput<T> out = model.forward(batch.image, ctx);
  DeepSupervisionLoss<T> l = batch_loss(out, batch, loss);
  tape.backward(l.total);
  return to_values(l);
}

template <typename T>
PassLosses evaluate_batch(const Model<T>& model, const Batch<T>& batch, const LossConfig& loss) {
  NoGradScope<T> no_grad;
  return to_values(batch_loss(model.forward(batch.image), batch, loss));
}

template <typename T>
PassLosses accumulate_gradients(Model<T>& model, Adam<T>& optimizer, std::span<const Batch<T>> sub_batches,
                                const LossConfig& loss, Rng* rng) {
  if (sub_batches.empty()) throw ConfigError("accumulate_gradients: no sub-batches");
  model.parameters().zero_grad();
  const ForwardContext ctx{rng != nullptr, rng};
  PassLosses mean;
  const double w = 1.0 / static_cast<double>(sub_batches.size());
  for (const Batch<T>& b : sub_batches) add_scaled(mean, forward_backward(model, b, loss, ctx), w);
  optimizer.step(static_cast<T>(w));
  model.parameters().zero_grad();
  return mean;
}

std::string TrainingHistory::to_csv(bool include_seconds) const {
  std::size_t levels = 0;
  for (const auto& e : epochs) levels = std::max(levels, e.val_level_losses.size());
  std::ostringstream os;
  os << "epoch,train_loss,val_loss,val_top_loss";
  for (std::size_t i = 0; i < levels; ++i) os << ",val_level" << i;
  os << ",val_dice";
  if (include_seconds) os << ",seconds";
  os << "\n" << std::setprecision(17);
  for (const auto& e : epochs) {
    os << e.epoch << "," << e.train_loss << "," << e.val_loss << "," << e.val_top_loss;
    for (std::size_t i = 0; i < levels; ++i) {
      os << "," << (i < e.val_level_losses.size() ? e.val_level_losses[i] : 0.0);
    }
    os << "," << e.val_dice;
    if (include_seconds) os << "," << std::setprecision(6) << e.seconds << std::setprecision(17);
    os << "\n";
  }
  return os.str();
}

double TrainingHistory::total_seconds() const {
  double s = 0;
  for (const auto& e : epochs) s += e.seconds;
  return s;
}

double TrainingHistory::mean_epoch_seconds() const {
  return epochs.empty() ? 0.0 : total_seconds() / static_cast<double>(epochs.size());
}

double hard_dice(std::span<const float> prob, std::span<const std::uint8_t> label) {
  if (prob.size() != label.size()) throw InputError("hard_dice: size mismatch");
  double inter = 0, p = 0, t = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const bool a = prob[i] >= 0.5f, b = label[i] != 0;
    inter += a && b;
    p += a;
    t += b;
  }
  return p + t == 0 ? 1.0 : 2.0 * inter / (p + t);
}

template <typename T>
std::vector<float> predict_foreground(const Model<T>& model, const Volume& v) {
  const Dims& d = v.dims;
  Tensor<T> x(Shape{1, 1, d[0], d[1], d[2]});
  for (std::size_t i = 0; i < v.data.size(); ++i) x[static_cast<std::int64_t>(i)] = static_cast<T>(v.data[i]);
  NoGradScope<T> no_grad;
  const ModelOutput<T> out = model.forward(x);
  const Tensor<T>& top = out.maps.back();
  const std::int64_t N = dims_voxels(d);
  std::vector<float> fg(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) fg[static_cast<std::size_t>(i)] = static_cast<float>(top[N + i]);
  return fg;
}

template <typename T>
TrainingHistory train_model(Model<T>& model, const std::vector<Volume>& train,
                            const std::vector<Volume>& validation, const TrainConfig& config,
                            const LossConfig& loss, const std::function<void(const EpochRecord&)>& on_epoch) {
  validate(config);
  validate(loss);
  if (train.empty()) throw ConfigError("training set is empty");
  const std::int64_t classes = model.config().classes;
  Adam<T> optimizer(model.parameters(), AdamOptions{config.lr});
  EarlyStopping stopper(config.patience_epochs);
  TrainingHistory history;
  std::vector<Tensor<T>> best;

  const std::vector<Batch<T>> val_batches =
      validation.empty() ? std::vector<Batch<T>>{} : batches_of<T>(validation, config.physical_batch, classes);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle, i)]);

    std::vector<Volume> samples;
    samples.reserve(train.size());
    for (auto i : order) {
      if (config.augment) {
        Rng rng(mix_seed(mix_seed(config.seed ^ 0xa5a5a5a5ULL, i), static_cast<std::uint64_t>(epoch)));
        samples.push_back(augment(train[i], rng));
      } else {
        samples.push_back(train[i]);
      }
    }
    const std::vector<Batch<T>> batches = batches_of<T>(samples, config.physical_batch, classes);

    PassLosses train_loss;
    const auto group = static_cast<std::size_t>(config.accumulation_steps);
    for (std::size_t s = 0, step = 0; s < batches.size(); s += group, ++step) {
      const std::size_t n = std::min(group, batches.size() - s);
      Rng dropout(mix_seed(mix_seed(config.seed ^ 0x5eedULL, static_cast<std::uint64_t>(epoch)), step));
      std::int64_t count = 0;
      for (std::size_t k = s; k < s + n; ++k) count += batches[k].image.dim(0);
      const PassLosses l = accumulate_gradients<T>(model, optimizer, std::span(batches).subspan(s, n), loss, &dropout);
      add_scaled(train_loss, l, static_cast<double>(count) / static_cast<double>(train.size()));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss.total;
    if (!val_batches.empty()) {
      PassLosses val;
      for (const auto& b : val_batches) {
        add_scaled(val, evaluate_batch(model, b, loss),
                   static_cast<double>(b.image.dim(0)) / static_cast<double>(validation.size()));
      }
      rec.val_loss = val.total;
      rec.val_level_losses = val.levels;
      rec.val_top_loss = val.levels.back();
      double dice = 0;
      for (const auto& v : validation) dice += hard_dice(predict_foreground(model, v), v.label);
      rec.val_dice = dice / static_cast<double>(validation.size());
    } else {
      rec.val_loss = train_loss.total;
      rec.val_level_losses = train_loss.levels;
      rec.val_top_loss = train_loss.levels.back();
    }
    const double monitored =
        config.checkpoint_policy == CheckpointPolicy::total_loss ? rec.val_loss : rec.val_top_loss;
    const bool stop = stopper.update(epoch, monitored);
    if (stopper.improved()) {
      best.clear();
      for (const auto& p : model.parameters().entries()) best.push_back(p.value.clone());
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (stop) {
      history.stopped_early = true;
      break;
    }
  }
  history.best_epoch = stopper.best_epoch();
  history.best_monitored = stopper.best_value();
  const auto& entries = model.parameters().entries();
  for (std::size_t k = 0; k < entries.size() && k < best.size(); ++k) {
    Tensor<T> p = entries[k].value;
    std::copy(best[k].data().begin(), best[k].data().end(), p.data().begin());
  }
  return history;
}

#define ATTNSEG_INSTANTIATE(T)                                                                         \
  template Batch<T> make_batch(std::span<const Volume* const>, std::int64_t);                         \
  template PassLosses forward_backward(Model<T>&, const Batch<T>&, const LossConfig&,                 \
                                       const ForwardContext&);                                          \
  template PassLosses evaluate_batch(const Model<T>&, const Batch<T>&, const LossConfig&);            \
  template PassLosses accumulate_gradients(Model<T>&, Adam<T>&, std::span<const Batch<T>>,            \
                                           const LossConfig&, Rng*);                                   \
  template std::vector<float> predict_foreground(const Model<T>&, const Volume&);                     \
  template TrainingHistory train_model(Model<T>&, const std::vector<Volume>&,                         \
                                       const std::vector<Volume>&, const TrainConfig&,                \
                                       const LossConfig&, const std::function<void(const EpochRecord&)>&);

ATTNSEG_INSTANTIATE(float)
ATTNSEG_INSTANTIATE(double)
#undef ATTNSEG_INSTANTIATE

}  // namespace attnseg
