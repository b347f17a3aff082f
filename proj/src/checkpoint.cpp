// Copyright 2026 The droptriple Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "droptriple/config.hpp"
#include "droptriple/error.hpp"
#include "droptriple/trainer.hpp"

namespace droptriple {

using nlohmann::json;

namespace {

constexpr const char* kMagicLine = "DROPTRIPLE-CHECKPOINT";

json MetricsToJson(const EpochMetrics& m) {
  return {{"epoch", m.epoch},
          {"learning_rate", m.learning_rate},
          {"loss", std::string(LossKindName(m.loss_used))},
          {"mean_loss", m.mean_loss},
          {"batches", m.batches},
          {"anchor_slots", m.anchor_slots},
          {"dropped_m", m.dropped_m},
          {"dropped_t", m.dropped_t},
          {"empty_negset_anchors", m.empty_negset_anchors},
          {"max_grad_norm", m.max_grad_norm},
          {"large_grad_steps", m.large_grad_steps},
          {"val_rsum_exact", m.val_rsum_exact},
          {"val_rsum_semantic", m.val_rsum_semantic}};
}

EpochMetrics MetricsFromJson(const json& j) {
  EpochMetrics m;
  m.epoch = j.at("epoch").get<std::size_t>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.loss_used = ParseLossKind(j.at("loss").get<std::string>());
  m.mean_loss = j.at("mean_loss").get<double>();
  m.batches = j.at("batches").get<std::size_t>();
  m.anchor_slots = j.at("anchor_slots").get<std::size_t>();
  m.dropped_m = j.at("dropped_m").get<std::size_t>();
  m.dropped_t = j.at("dropped_t").get<std::size_t>();
  m.empty_negset_anchors = j.at("empty_negset_anchors").get<std::size_t>();
  m.max_grad_norm = j.at("max_grad_norm").get<double>();
  m.large_grad_steps = j.at("large_grad_steps").get<std::size_t>();
  m.val_rsum_exact = j.at("val_rsum_exact").get<double>();
  m.val_rsum_semantic = j.at("val_rsum_semantic").get<double>();
  return m;
}

void AppendLittleEndian(std::vector<unsigned char>& out, std::uint64_t bits) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
}

std::uint64_t ReadLittleEndian(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t{p[b]} << (8 * b);
  return bits;
}

// Parameters, then first moments, then second moments.
std::vector<Matrix*> Blocks(Checkpoint& c) {
  std::vector<Matrix*> blocks;
  c.params.ForEachTensor([&](std::string_view, Matrix& m) { blocks.push_back(&m); });
  for (Matrix& m : c.optimizer.first_moment) blocks.push_back(&m);
  for (Matrix& m : c.optimizer.second_moment) blocks.push_back(&m);
  return blocks;
}

}  // namespace

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path) {
  Checkpoint copy = checkpoint;
  json tensors = json::array();
  copy.params.ForEachTensor([&](std::string_view name, Matrix& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  if (copy.optimizer.first_moment.size() != tensors.size() ||
      copy.optimizer.second_moment.size() != tensors.size()) {
    throw Error(ErrorCode::kShapeMismatch, "optimizer state does not match params");
  }

  std::vector<unsigned char> payload;
  for (Matrix* m : Blocks(copy)) {
    for (double v : m->values()) AppendLittleEndian(payload, std::bit_cast<std::uint64_t>(v));
  }

  json history = json::array();
  for (const EpochMetrics& m : copy.history) history.push_back(MetricsToJson(m));
  const json header = {
      {"version", copy.format_version},
      {"config", ToJson(copy.config)},
      {"epoch", copy.epoch},
      {"rng_seed", copy.rng.seed()},
      {"rng_state", copy.rng.SerializeState()},
      {"optimizer",
       {{"beta1", copy.optimizer.beta1},
        {"beta2", copy.optimizer.beta2},
        {"epsilon", copy.optimizer.epsilon},
        {"step", copy.optimizer.step}}},
      {"history", history},
      {"tensors", tensors},
      {"payload_bytes", payload.size()}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << kMagicLine << '\n' << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  std::vector<unsigned char> trailer;
  AppendLittleEndian(trailer, Fnv1a64(payload));
  out.write(reinterpret_cast<const char*>(trailer.data()), 8);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::string magic;
  std::string header_line;
  if (!std::getline(in, magic) || magic != kMagicLine) {
    throw Error(ErrorCode::kCorruptRecord, "not a checkpoint file", 0);
  }
  if (!std::getline(in, header_line)) {
    throw Error(ErrorCode::kCorruptRecord, "missing header", 1);
  }

  Checkpoint c;
  json header;
  std::size_t payload_bytes = 0;
  try {
    header = json::parse(header_line);
    const int version = header.at("version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw Error(ErrorCode::kFormatVersionMismatch,
                  "checkpoint format version " + std::to_string(version) +
                      ", this build reads version " +
                      std::to_string(kCheckpointFormatVersion));
    }
    c.format_version = version;
    c.config = TrainConfigFromJson(header.at("config"));
    c.epoch = header.at("epoch").get<std::size_t>();
    c.rng = Rng::FromState(header.at("rng_seed").get<std::uint64_t>(),
                           header.at("rng_state").get<std::string>());
    const json& opt = header.at("optimizer");
    c.optimizer.beta1 = opt.at("beta1").get<double>();
    c.optimizer.beta2 = opt.at("beta2").get<double>();
    c.optimizer.epsilon = opt.at("epsilon").get<double>();
    c.optimizer.step = opt.at("step").get<std::uint64_t>();
    for (const json& m : header.at("history")) c.history.push_back(MetricsFromJson(m));
    payload_bytes = header.at("payload_bytes").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptRecord, e.what(), 1);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) {
      throw Error(ErrorCode::kCorruptRecord, e.what(), 1);
    }
    throw;
  }

  // Shapes come from the config; the header's tensor table must agree.
  c.params = ZerosLike(InitParams(c.config.encoder, 0));
  c.optimizer.first_moment.clear();
  c.optimizer.second_moment.clear();
  std::size_t index = 0;
  try {
    const json& tensors = header.at("tensors");
    c.params.ForEachTensor([&](std::string_view name, Matrix& m) {
      if (index >= tensors.size() ||
          tensors[index].at("name").get<std::string>() != name ||
          tensors[index].at("rows").get<std::size_t>() != m.rows() ||
          tensors[index].at("cols").get<std::size_t>() != m.cols()) {
        throw Error(ErrorCode::kCorruptRecord,
                    "tensor table disagrees at " + std::string(name), 1);
      }
      c.optimizer.first_moment.emplace_back(m.rows(), m.cols());
      c.optimizer.second_moment.emplace_back(m.rows(), m.cols());
      ++index;
    });
    if (index != tensors.size()) {
      throw Error(ErrorCode::kCorruptRecord, "extra tensors in header", 1);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptRecord, e.what(), 1);
  }

  std::vector<unsigned char> rest((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  auto blocks = Blocks(c);
  std::size_t expected = 0;
  for (const Matrix* m : blocks) expected += 8 * m->size();
  if (expected != payload_bytes) {
    throw Error(ErrorCode::kCorruptRecord, "payload size disagrees with tensors", 2);
  }
  if (rest.size() != payload_bytes + 8) {
    throw Error(ErrorCode::kCorruptRecord,
                "payload has " + std::to_string(rest.size()) +
                    " bytes, expected " + std::to_string(payload_bytes + 8),
                2);
  }
  const std::uint64_t checksum = ReadLittleEndian(rest.data() + payload_bytes);
  if (checksum != Fnv1a64({rest.data(), payload_bytes})) {
    throw Error(ErrorCode::kCorruptRecord, "payload checksum mismatch", 2);
  }
  const unsigned char* p = rest.data();
  for (Matrix* m : blocks) {
    for (double& v : m->values()) {
      v = std::bit_cast<double>(ReadLittleEndian(p));
      p += 8;
    }
  }
  return c;
}

}  // namespace droptriple
