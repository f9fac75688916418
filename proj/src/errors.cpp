#include "cac/types.hpp"

namespace cac {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::EmptySplit: return "EmptySplit";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::OneCluster: return "OneCluster";
        case ErrorCode::EmptyCluster: return "EmptyCluster";
        case ErrorCode::PointAlreadyInCluster: return "PointAlreadyInCluster";
        case ErrorCode::WouldCreateOneClassCluster: return "WouldCreateOneClassCluster";
        case ErrorCode::WouldEmptyCluster: return "WouldEmptyCluster";
        case ErrorCode::NotBinary: return "NotBinary";
        case ErrorCode::InfeasibleInit: return "InfeasibleInit";
        case ErrorCode::IllegalMove: return "IllegalMove";
        case ErrorCode::UntrainedModel: return "UntrainedModel";
        case ErrorCode::OneClassOnly: return "OneClassOnly";
        case ErrorCode::NoPositives: return "NoPositives";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace cac
