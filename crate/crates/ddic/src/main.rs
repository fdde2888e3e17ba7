fn main() {
    std::process::exit(ddic::cli::main_entry());
}
