#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace schemex {

enum class Errc {
  MalformedSchema,
  UnknownPath,
  SchemaTooDeep,
  InvariantViolation,
  EmptyCorpus,
  OutOfBounds,
  EmptyTypeSet,
  PromptOverflow,
  TextTooLong,
  MisalignedSpan,
  UnknownGoldType,
  DimensionMismatch,
  OddHeadDim,
  ShapeMismatch,
  NoCandidates,
  MalformedRecord,
  OffsetOutOfRange,
  UnknownTask,
  CheckpointMismatch,
  BadCheckpoint,
  BadScoreFile,
  BadConfig,
  Io,
};

// Module-qualified name, e.g. "schema.MalformedSchema".
constexpr std::string_view qualified_name(Errc c) {
  switch (c) {
    case Errc::MalformedSchema: return "schema.MalformedSchema";
    case Errc::UnknownPath: return "schema.UnknownPath";
    case Errc::SchemaTooDeep: return "schema.SchemaTooDeep";
    case Errc::InvariantViolation: return "schema.InvariantViolation";
    case Errc::EmptyCorpus: return "tokenize.EmptyCorpus";
    case Errc::OutOfBounds: return "tokenize.OutOfBounds";
    case Errc::EmptyTypeSet: return "query.EmptyTypeSet";
    case Errc::PromptOverflow: return "query.PromptOverflow";
    case Errc::TextTooLong: return "query.TextTooLong";
    case Errc::MisalignedSpan: return "query.MisalignedSpan";
    case Errc::UnknownGoldType: return "query.UnknownGoldType";
    case Errc::DimensionMismatch: return "model.DimensionMismatch";
    case Errc::OddHeadDim: return "model.OddHeadDim";
    case Errc::ShapeMismatch: return "model.ShapeMismatch";
    case Errc::NoCandidates: return "decode.NoCandidates";
    case Errc::MalformedRecord: return "data.MalformedRecord";
    case Errc::OffsetOutOfRange: return "data.OffsetOutOfRange";
    case Errc::UnknownTask: return "metrics.UnknownTask";
    case Errc::CheckpointMismatch: return "model.CheckpointMismatch";
    case Errc::BadCheckpoint: return "model.BadCheckpoint";
    case Errc::BadScoreFile: return "decode.BadScoreFile";
    case Errc::BadConfig: return "cli.BadConfig";
    case Errc::Io: return "cli.Io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return qualified_name(code_); }

 private:
  Errc code_;
};

}  // namespace schemex
