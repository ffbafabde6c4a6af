#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gangmam {

enum class Errc {
  // feature_model
  EmptyDefinitionList,
  MalformedName,
  UnknownFeature,
  BadHash,
  LengthMismatch,
  HashMismatch,
  NotAdditive,
  CatalogMismatch,
  ParseError,
  NonBinaryCell,
  RowLengthMismatch,
  DuplicateHashRow,
  // apk_io
  XmlSyntaxError,
  MissingPackageAttribute,
  UnknownRootElement,
  EmptyCorpus,
  // gang_engine / blackbox_detector
  BadConfig,
  ShapeMismatch,
  NonFiniteLoss,
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  BadParams,
  EmptyInput,
  // mam_engine / external_tools
  IoError,
  ToolFailed,
  TranscriptMiss,
  Timeout,
  KeystoreError,
  EmulatorNotFound,
  InstallFailed,
  // cli
  UnknownFlag,
  MissingValue,
  ConflictingFlags,
  NoInputs,
  OutputDirUnwritable,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// An Error that points at a 1-based line/column in some text input.
class ParseFailure : public Error {
 public:
  ParseFailure(Errc code, std::size_t line, std::size_t column, const std::string& what);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Tool exited nonzero; carries the exit code and an excerpt of stderr.
class ToolFailure : public Error {
 public:
  ToolFailure(int exit_code, std::string stderr_excerpt, const std::string& what);

  int exit_code() const noexcept { return exit_code_; }
  const std::string& stderr_excerpt() const noexcept { return stderr_excerpt_; }

 private:
  int exit_code_;
  std::string stderr_excerpt_;
};

}  // namespace gangmam
