fn main() {
    if let Err(e) = leobeam_harness::cli::run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
