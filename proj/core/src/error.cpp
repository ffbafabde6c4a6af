#include "gangmam/error.hpp"

namespace gangmam {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyDefinitionList: return "EmptyDefinitionList";
    case Errc::MalformedName: return "MalformedName";
    case Errc::UnknownFeature: return "UnknownFeature";
    case Errc::BadHash: return "BadHash";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::HashMismatch: return "HashMismatch";
    case Errc::NotAdditive: return "NotAdditive";
    case Errc::CatalogMismatch: return "CatalogMismatch";
    case Errc::ParseError: return "ParseError";
    case Errc::NonBinaryCell: return "NonBinaryCell";
    case Errc::RowLengthMismatch: return "RowLengthMismatch";
    case Errc::DuplicateHashRow: return "DuplicateHashRow";
    case Errc::XmlSyntaxError: return "XmlSyntaxError";
    case Errc::MissingPackageAttribute: return "MissingPackageAttribute";
    case Errc::UnknownRootElement: return "UnknownRootElement";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::BadConfig: return "BadConfig";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::BadParams: return "BadParams";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::IoError: return "IoError";
    case Errc::ToolFailed: return "ToolFailed";
    case Errc::TranscriptMiss: return "TranscriptMiss";
    case Errc::Timeout: return "Timeout";
    case Errc::KeystoreError: return "KeystoreError";
    case Errc::EmulatorNotFound: return "EmulatorNotFound";
    case Errc::InstallFailed: return "InstallFailed";
    case Errc::UnknownFlag: return "UnknownFlag";
    case Errc::MissingValue: return "MissingValue";
    case Errc::ConflictingFlags: return "ConflictingFlags";
    case Errc::NoInputs: return "NoInputs";
    case Errc::OutputDirUnwritable: return "OutputDirUnwritable";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

ParseFailure::ParseFailure(Errc code, std::size_t line, std::size_t column,
                           const std::string& what)
    : Error(code, "line " + std::to_string(line) + ", column " + std::to_string(column) +
                      ": " + what),
      line_(line),
      column_(column) {}

ToolFailure::ToolFailure(int exit_code, std::string stderr_excerpt, const std::string& what)
    : Error(Errc::ToolFailed, what + " (exit " + std::to_string(exit_code) + "): " + stderr_excerpt),
      exit_code_(exit_code),
      stderr_excerpt_(std::move(stderr_excerpt)) {}

}  // namespace gangmam
