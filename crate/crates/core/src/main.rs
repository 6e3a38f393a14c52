fn main() {
    if let Err(e) = sorsketch::cli::run(std::env::args().collect()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
