fn main() -> std::process::ExitCode {
    lora_combining::cli::main()
}
