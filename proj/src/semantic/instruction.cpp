#include "m4sc/semantic/instruction.hpp"

#include <istream>
#include <ostream>

#include "json.hpp"
#include "m4sc/errors.hpp"
#include "m4sc/semantic/vocab.hpp"

namespace m4sc::semantic {

using nlohmann::json;

std::string_view task_name(Task t) {
  switch (t) {
    case Task::Caption:
      return "caption";
    case Task::Vqa:
      return "vqa";
    case Task::TextClass:
      return "textclass";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "caption") return Task::Caption;
  if (name == "vqa") return Task::Vqa;
  if (name == "textclass") return Task::TextClass;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

void TaskInstruction::validate() const {
  if (instruction.empty()) throw ConfigError("task instruction has empty instruction text");
  if (output.empty()) throw ConfigError("task instruction has empty output");
  if (input_image) input_image->validate();
}

std::string TaskInstruction::answer_word() const {
  const auto words = split_words(output);
  if (words.empty()) throw ConfigError("task instruction output has no words");
  return words.front();
}

Task TaskInstruction::task() const {
  const auto it = metadata.find("task");
  if (it == metadata.end()) throw ConfigError("task instruction metadata lacks 'task'");
  return parse_task(it->second);
}

std::string to_record(const TaskInstruction& t) {
  json j;
  j["instruction"] = t.instruction;
  j["input_text"] = t.input_text;
  j["output"] = t.output;
  if (t.input_image) {
    json objects = json::array();
    for (const auto& o : t.input_image->objects) {
      objects.push_back({{"shape", o.shape},
                         {"color", o.color},
                         {"size", o.size},
                         {"x", o.position[0]},
                         {"y", o.position[1]}});
    }
    j["scene"] = {{"seed", t.input_image->seed}, {"objects", std::move(objects)}};
  } else {
    j["scene"] = nullptr;
  }
  j["metadata"] = t.metadata;
  return j.dump();
}

TaskInstruction from_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("corpus record is not valid JSON: ") + e.what());
  }
  try {
    TaskInstruction t;
    t.instruction = j.at("instruction").get<std::string>();
    t.input_text = j.at("input_text").get<std::string>();
    t.output = j.at("output").get<std::string>();
    t.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    const json& scene = j.at("scene");
    if (!scene.is_null()) {
      ToyScene s;
      s.seed = scene.at("seed").get<std::uint64_t>();
      for (const auto& o : scene.at("objects")) {
        SceneObject obj;
        obj.shape = o.at("shape").get<std::size_t>();
        obj.color = o.at("color").get<std::size_t>();
        obj.size = o.at("size").get<std::size_t>();
        obj.position = {o.at("x").get<double>(), o.at("y").get<double>()};
        s.objects.push_back(obj);
      }
      t.input_image = std::move(s);
    }
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("corpus record has bad fields: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptionError(std::string("corpus record invalid: ") + e.what());
  }
}

void write_corpus(std::ostream& out, const std::vector<TaskInstruction>& corpus) {
  for (const auto& t : corpus) out << to_record(t) << '\n';
}

std::vector<TaskInstruction> read_corpus(std::istream& in) {
  std::vector<TaskInstruction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(from_record(line));
    } catch (const CorruptionError& e) {
      throw CorruptionError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace m4sc::semantic
