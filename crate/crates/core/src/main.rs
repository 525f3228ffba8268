fn main() {
    std::process::exit(review_rating::cli::run(std::env::args_os()));
}
