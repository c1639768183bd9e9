fn main() {
    std::process::exit(blob_aggregation::harness::cli::run(std::env::args_os()));
}
