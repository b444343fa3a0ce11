fn main() {
    std::process::exit(loewner_lab::cli::dispatch(std::env::args_os()));
}
