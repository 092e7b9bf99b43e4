fn main() -> std::process::ExitCode {
    qforge_cli::main_entry()
}
