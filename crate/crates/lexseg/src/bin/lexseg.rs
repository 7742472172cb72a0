fn main() {
    std::process::exit(lexseg::cli::dispatch(std::env::args_os()));
}
