#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace upsd {

// Every failure raised by the library carries a stable machine-readable code
// (used in HTTP error bodies and persisted records) next to the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define UPSD_DEFINE_ERROR(Name, Code)                                      \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& message) : Error(Code, message) {} \
    }

UPSD_DEFINE_ERROR(ConflictingDetermination, "conflicting_determination");
UPSD_DEFINE_ERROR(InvalidValue, "invalid_value");
UPSD_DEFINE_ERROR(InvalidHistory, "invalid_history");
UPSD_DEFINE_ERROR(PreconditionViolation, "precondition_violation");
UPSD_DEFINE_ERROR(TransportError, "transport_error");
UPSD_DEFINE_ERROR(ProviderError, "provider_error");
UPSD_DEFINE_ERROR(FixtureExhausted, "fixture_exhausted");
UPSD_DEFINE_ERROR(NoObjectFound, "no_object_found");
UPSD_DEFINE_ERROR(UnknownSchema, "unknown_schema");
UPSD_DEFINE_ERROR(EmptyGeneration, "empty_generation");
UPSD_DEFINE_ERROR(WrongArity, "wrong_arity");
UPSD_DEFINE_ERROR(LengthMismatch, "length_mismatch");
UPSD_DEFINE_ERROR(EmptyInput, "empty_input");
UPSD_DEFINE_ERROR(RaggedMatrix, "ragged_matrix");
UPSD_DEFINE_ERROR(DegenerateAgreement, "degenerate_agreement");
UPSD_DEFINE_ERROR(InconsistentSessionIds, "inconsistent_session_ids");
UPSD_DEFINE_ERROR(ConfigError, "config_error");
UPSD_DEFINE_ERROR(RecordError, "record_error");
UPSD_DEFINE_ERROR(BindError, "bind_error");

#undef UPSD_DEFINE_ERROR

class SchemaViolation : public Error {
public:
    SchemaViolation(std::string field, std::string reason)
        : Error("schema_violation", "field '" + field + "': " + reason),
          field_(std::move(field)),
          reason_(std::move(reason)) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string field_;
    std::string reason_;
};

class StructuredOutputFailure : public Error {
public:
    StructuredOutputFailure(const std::string& schema_id, std::vector<std::string> raw_attempts,
                            const std::string& last_error)
        : Error("structured_output_failure",
                schema_id + ": no valid reply after " + std::to_string(raw_attempts.size()) +
                    " attempt(s); last error: " + last_error),
          raw_attempts_(std::move(raw_attempts)) {}

    const std::vector<std::string>& raw_attempts() const noexcept { return raw_attempts_; }

private:
    std::vector<std::string> raw_attempts_;
};

class MissingPlaceholder : public Error {
public:
    explicit MissingPlaceholder(std::string name)
        : Error("missing_placeholder", "no binding for placeholder <" + name + ">"),
          name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class UnparseableAnswer : public Error {
public:
    explicit UnparseableAnswer(int question_index)
        : Error("unparseable_answer",
                "could not parse a Likert choice for question " + std::to_string(question_index + 1)),
          question_index_(question_index) {}

    int question_index() const noexcept { return question_index_; }

private:
    int question_index_;
};

class SessionAborted : public Error {
public:
    SessionAborted(std::string session_id, const std::string& cause_code, const std::string& cause)
        : Error("session_aborted", "session " + session_id + " aborted (" + cause_code + "): " + cause),
          session_id_(std::move(session_id)),
          cause_code_(cause_code) {}

    const std::string& session_id() const noexcept { return session_id_; }
    const std::string& cause_code() const noexcept { return cause_code_; }

private:
    std::string session_id_;
    std::string cause_code_;
};

}  // namespace upsd
