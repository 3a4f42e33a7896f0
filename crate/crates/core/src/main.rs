fn main() {
    std::process::exit(planfolio::cli::run());
}
