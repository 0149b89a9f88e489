#include "m4sc/semantic/dataset.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "m4sc/errors.hpp"
#include "m4sc/numerics/rng.hpp"

namespace m4sc::semantic {

namespace {

constexpr std::string_view kCaptionInstruction =
    "Look at the scene, name the shape that occurs most often, then list every object by size, "
    "color and shape.";
constexpr std::string_view kVqaInstruction =
    "Look at the scene and answer the question with one word. Counts are digits; colors, shapes "
    "and sizes use their plain names.";
constexpr std::string_view kTextClassInstruction =
    "Read the review and label its sentiment as positive or negative.";

constexpr std::array<std::string_view, 5> kSubjects = {"movie", "film", "story", "acting", "plot"};
constexpr std::array<std::string_view, 3> kPositiveAdj = {"great", "wonderful", "excellent"};
constexpr std::array<std::string_view, 2> kIntensifiers = {"really", "very"};
constexpr std::array<std::string_view, 4> kNegativeAdj = {"terrible", "boring", "awful", "dull"};
constexpr std::array<std::string_view, 2> kPositiveVerb = {"loved", "enjoyed"};
constexpr std::array<std::string_view, 1> kNegativeVerb = {"hated"};

template <typename Arr>
std::string_view pick(Rng& rng, const Arr& arr) {
  return arr[rng.below(arr.size())];
}

std::string describe_object(const SceneObject& o) {
  return std::string(kSizes[o.size]) + " " + std::string(kColors[o.color]) + " " +
         std::string(kShapes[o.shape]);
}

TaskInstruction make_caption(Rng& rng) {
  const std::size_t n_obj = 1 + rng.below(kMaxObjects);
  ToyScene scene;
  std::size_t top = 0;
  for (;;) {
    scene = ToyScene::random(rng, n_obj);
    std::array<std::size_t, kShapes.size()> counts{};
    for (const auto& o : scene.objects) ++counts[o.shape];
    const auto best = std::max_element(counts.begin(), counts.end());
    if (std::count(counts.begin(), counts.end(), *best) == 1) {
      top = static_cast<std::size_t>(best - counts.begin());
      break;
    }
  }
  std::string output = std::string(kShapes[top]) + " :";
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    output += (i == 0 ? " " : " , ") + describe_object(scene.objects[i]);
  }
  TaskInstruction t;
  t.instruction = std::string(kCaptionInstruction);
  t.input_image = std::move(scene);
  t.input_text = "describe the image";
  t.output = std::move(output);
  t.metadata = {{"task", "caption"}};
  return t;
}

TaskInstruction make_vqa(Rng& rng) {
  TaskInstruction t;
  t.instruction = std::string(kVqaInstruction);
  t.metadata = {{"task", "vqa"}};
  const std::size_t kind = rng.below(4);
  if (kind == 0) {
    const std::size_t n_obj = 1 + rng.below(kMaxObjects);
    t.input_image = ToyScene::random(rng, n_obj);
    t.input_text = "how many objects are there";
    t.output = std::to_string(n_obj);
    t.metadata["question"] = "count";
    return t;
  }
  t.input_image = ToyScene::random(rng, 1);
  const SceneObject& o = t.input_image->objects.front();
  switch (kind) {
    case 1:
      t.input_text = "what color is the object";
      t.output = std::string(kColors[o.color]);
      t.metadata["question"] = "color";
      break;
    case 2:
      t.input_text = "what shape is the object";
      t.output = std::string(kShapes[o.shape]);
      t.metadata["question"] = "shape";
      break;
    default:
      t.input_text = "what size is the object";
      t.output = std::string(kSizes[o.size]);
      t.metadata["question"] = "size";
      break;
  }
  return t;
}

TaskInstruction make_textclass(Rng& rng) {
  const bool positive = rng.below(2) == 0;
  std::string sentence;
  if (rng.below(2) == 0) {
    // "the <subject> was [really] <adjective>"
    sentence = "the " + std::string(pick(rng, kSubjects)) + (rng.below(2) == 0 ? " was" : " is");
    if (rng.below(2) == 0) sentence += " " + std::string(pick(rng, kIntensifiers));
    sentence += " " + std::string(positive ? pick(rng, kPositiveAdj) : pick(rng, kNegativeAdj));
  } else {
    // "i [really] <verb> the <subject>"
    sentence = "i";
    if (rng.below(2) == 0) sentence += " really";
    sentence += " " + std::string(positive ? pick(rng, kPositiveVerb) : pick(rng, kNegativeVerb));
    sentence += " the " + std::string(pick(rng, kSubjects));
  }
  TaskInstruction t;
  t.instruction = std::string(kTextClassInstruction);
  t.input_text = std::move(sentence);
  t.output = positive ? "positive" : "negative";
  t.metadata = {{"task", "textclass"}};
  return t;
}

}  // namespace

std::vector<TaskInstruction> gen_dataset(Task task, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("gen_dataset: n must be at least 1");
  std::vector<TaskInstruction> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    switch (task) {
      case Task::Caption:
        out.push_back(make_caption(rng));
        break;
      case Task::Vqa:
        out.push_back(make_vqa(rng));
        break;
      case Task::TextClass:
        out.push_back(make_textclass(rng));
        break;
    }
    out.back().metadata["sample"] = std::to_string(i);
  }
  return out;
}

std::vector<TaskInstruction> gen_mixed_dataset(std::size_t n_per_task, std::uint64_t seed) {
  std::vector<TaskInstruction> out;
  for (Task t : {Task::Caption, Task::Vqa, Task::TextClass}) {
    auto part = gen_dataset(t, n_per_task, derive_seed(seed, static_cast<std::uint64_t>(t) + 101));
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  Rng rng(derive_seed(seed, 0xA11));
  for (std::size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[rng.below(i)]);
  }
  return out;
}

std::vector<TokenId> scene_tokens(const Vocabulary& vocab, const ToyScene& scene) {
  std::vector<TokenId> ids{vocab.count(scene.objects.size())};
  for (const auto& o : scene.objects) {
    ids.push_back(vocab.size_word(o.size));
    ids.push_back(vocab.color(o.color));
    ids.push_back(vocab.shape(o.shape));
  }
  return ids;
}

Example prepare_example(const Vocabulary& vocab, const VisionFeaturizer& featurizer,
                        const TaskInstruction& sample, bool scene_as_text) {
  Example ex;
  ex.task = sample.task();
  ex.tokens.push_back(vocab.id("<" + std::string(task_name(ex.task)) + ">"));
  for (TokenId id : vocab.tokenize(sample.input_text)) ex.tokens.push_back(id);
  ex.answer = vocab.id(sample.answer_word());
  if (sample.input_image) {
    const ToyScene& scene = *sample.input_image;
    if (scene_as_text) {
      for (TokenId id : scene_tokens(vocab, scene)) ex.tokens.push_back(id);
      ex.vision = Matrix(0, featurizer.feature_dim());
    } else {
      ex.vision = featurizer.encode(scene);
      ex.anchors.push_back({vocab.count(scene.objects.size())});
      for (const auto& o : scene.objects) {
        ex.anchors.push_back({vocab.size_word(o.size), vocab.color(o.color), vocab.shape(o.shape)});
      }
    }
  } else {
    ex.vision = Matrix(0, featurizer.feature_dim());
  }
  return ex;
}

std::vector<Example> prepare_examples(const Vocabulary& vocab, const VisionFeaturizer& featurizer,
                                      const std::vector<TaskInstruction>& samples,
                                      bool scene_as_text) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(prepare_example(vocab, featurizer, s, scene_as_text));
  return out;
}

}  // namespace m4sc::semantic
