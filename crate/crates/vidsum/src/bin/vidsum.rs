fn main() {
    std::process::exit(vidsum::cli::main());
}
