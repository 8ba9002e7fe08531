fn main() {
    std::process::exit(gfrag::cli::dispatch(std::env::args_os()));
}
