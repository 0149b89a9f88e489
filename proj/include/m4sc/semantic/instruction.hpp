#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "m4sc/semantic/scene.hpp"

namespace m4sc::semantic {

enum class Task { Caption, Vqa, TextClass };

std::string_view task_name(Task t);
/// Throws ConfigError on an unknown name.
Task parse_task(std::string_view name);

/// Instruction / Input / Output / Metadata record for one task sample.
/// The first whitespace-delimited word of `output` is the answer slot the
/// model is trained to produce.
struct TaskInstruction {
  std::string instruction;
  std::optional<ToyScene> input_image;
  std::string input_text;
  std::string output;
  std::map<std::string, std::string> metadata;

  /// Throws ConfigError when instruction or output is empty.
  void validate() const;
  std::string answer_word() const;
  /// Task named by metadata["task"]; throws ConfigError when absent.
  Task task() const;

  friend bool operator==(const TaskInstruction&, const TaskInstruction&) = default;
};

/// Corpus format: one JSON object per line with keys
///   "instruction", "input_text", "output"  (strings)
///   "scene"     null or {"seed": u64, "objects": [{"shape","color","size","x","y"}]}
///   "metadata"  object of string values
/// Escaping is standard JSON string escaping, so newlines and quotes inside
/// fields never break the line structure.
std::string to_record(const TaskInstruction& t);
TaskInstruction from_record(std::string_view line);

void write_corpus(std::ostream& out, const std::vector<TaskInstruction>& corpus);
/// Throws CorruptionError naming the offending line number.
std::vector<TaskInstruction> read_corpus(std::istream& in);

}  // namespace m4sc::semantic
