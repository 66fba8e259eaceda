#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace acae {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using MatX2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// Error codes shared with the C API (see include/acae/acae.h).
enum class Err : int {
  Ok = 0,
  InvalidArgument,
  ConfigInvalid,
  Io,
  Parse,
  DepthTooSmall,
  PartitionMismatch,
  AsymmetricFormat,
  TooFewLatents,
  DegenerateRow,
  IncompleteInput,
  EmptyCorpus,
  ShapeMismatch,
  UnknownTag,
  EmptyLabelSet,
  SingularSystem,
  NoValidJoints,
  DegenerateConfiguration,
  InvalidRoot,
};

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Err code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

// FNV-1a, used for catalog hashes, sub-seed derivation and artifact digests.
inline std::uint64_t fnv64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
  return fnv64(purpose, fnv64(std::string_view(buf, 8)));
}

std::string hex64(std::uint64_t v);

// Worker count for embarrassingly parallel task fans; capped by ACAE_THREADS.
int worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each task must be
// independent and deterministic; callers combine results by index so the outcome
// never depends on scheduling.
void parallel_tasks(int n, const std::function<void(int)>& fn);

}  // namespace acae
